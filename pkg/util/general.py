"""Utility module for general functions"""

import json
import hashlib
from datetime import datetime


def log_dict(dict: dict, file: str, mode: str = "w"):
    """
    This function is used for logging a dict.
    Mainly, we use it for logging {paths}, {settings} and the run manifest.
    """
    with open(file, mode) as f:
        json.dump(dict, f, indent=4)


def append_logs(msg: str, file: str, mode: str = "a"):
    """
    This function appends a timed block to a log file.
    """
    now = datetime.now()
    block = f"---------------- " \
            f"{now.strftime('%d/%m/%Y %H:%M:%S')}" \
            f" ----------------" \
            f"\n{msg}\n\n"

    with open(file, mode) as logs_file:
        logs_file.write(block)


def check_type(var, var_type, name: str = "variable"):
    """
    This function checks whether a config value (e.g. a whole
    config section) has the expected type.
    """

    if type(var) != var_type:
        raise TypeError(f"Config {name} should be of type "
                        f"{var_type.__name__}, not {type(var).__name__}.")

    return True


def extract_json(json_path: str, verbose: bool = False) -> dict:
    """
    This function reads a config file or a run manifest.
    Both are .json files holding a single object.
    """

    if not json_path.endswith(".json"):
        raise ValueError(f"'{json_path}' is not a .json file.")

    with open(json_path) as json_file:
        data = json.load(json_file)

    if not isinstance(data, dict):
        raise ValueError(f"'{json_path}' should hold a JSON object.")
    if verbose: print(data)

    return data


def file_digest(path: str) -> str:
    """
    Returns the sha256 hex digest of a file. Used to pin the
    outputs of a run in its manifest.
    """
    digest = hashlib.sha256()

    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            digest.update(block)

    return digest.hexdigest()
