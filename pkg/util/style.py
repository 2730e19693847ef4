"""Utility module for style-related functionality"""


class print_style:
    PURPLE = '\033[95m'
    CYAN = '\033[96m'
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BOLD = '\033[1m'
    END = '\033[0m'


# Bar format shared by all tqdm iterators
BAR_FORMAT = '{l_bar}{bar:30}{r_bar}{bar:-30b}'


def print_result(succeeded: bool = True):

    if succeeded:
        print(print_style.GREEN + "OK" + print_style.END)
    elif not succeeded:
        print(print_style.RED + "FAIL" + print_style.END)
    else:
        raise ValueError("Parameter 'succeeded' should be a boolean")

    return


def print_header(message: str):
    print(print_style.BOLD + message + print_style.END)


def print_verdict(name: str, passed: bool, detail: str = ""):
    """Prints a single check line, e.g. in the experiment summaries."""
    marker = (print_style.GREEN + "PASS" if passed
              else print_style.YELLOW + "MISS") + print_style.END
    print(f"{name:<40s}{marker}  {detail}")
