import os
from pathlib import Path
from typing import Dict, Optional

import requests
from dotenv import load_dotenv

from .bundle import atomic_write_text
from .errors import DownloadError

ROOT_DIR = Path(__file__).resolve().parent.parent

# dataset -> (environment variable, default URL, destination inside the task directory)
DATASETS: Dict[str, tuple] = {
    "wholesale": (
        "WHOLESALE_DATA_URL",
        "https://archive.ics.uci.edu/ml/machine-learning-databases/00292/Wholesale%20customers%20data.csv",
        "wholesale/data/wholesale.csv",
    ),
    "enzyme": ("ENZYME_DATA_URL", None, "enzyme/data/enzyme.csv"),
    "hdi": ("HDI_DATA_URL", "https://ourworldindata.org/grapher/human-development-index.csv", "hdi/data/hdi.csv"),
}


def make_request(url: str, **kwargs) -> requests.Response:
    response = requests.get(url, **kwargs)
    response.raise_for_status()
    return response


def dataset_url(name: str) -> str:
    load_dotenv()
    if name not in DATASETS:
        raise KeyError(f"unknown dataset '{name}'; choose from {sorted(DATASETS)}")
    env_var, default, _ = DATASETS[name]
    url = os.getenv(env_var, default)
    if not url:
        raise DownloadError(f"no download location for '{name}'; set {env_var} in the environment or .env")
    return url


def default_destination(name: str) -> Path:
    return ROOT_DIR / DATASETS[name][2]


def fetch(name: str, dest: Optional[Path] = None, timeout: float = 60.0) -> Path:
    """Download a dataset CSV into its task directory (or ``dest``)."""
    url = dataset_url(name)
    dest = Path(dest) if dest is not None else default_destination(name)
    print(f"📥 [*] Downloading {name} from {url}...")
    try:
        response = make_request(url, timeout=timeout)
    except requests.exceptions.RequestException as e:
        raise DownloadError(f"request for {url} failed: {e}")
    atomic_write_text(dest, response.text)
    print(f"✅ [+] Saved {name} to {dest}")
    return dest
