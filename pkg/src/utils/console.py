"""
Colored status lines for the command-line tool
"""

from colorama import Fore, Style
from tabulate import tabulate

RULE_WIDTH = 60


def banner(title, subtitle=None):
    """Print a framed title block"""
    print(f"\n{Fore.CYAN}{'=' * RULE_WIDTH}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}  {title}{Style.RESET_ALL}")
    if subtitle:
        print(f"{Fore.CYAN}  {subtitle}{Style.RESET_ALL}")
    print(f"{Fore.CYAN}{'=' * RULE_WIDTH}{Style.RESET_ALL}\n")


def info(message):
    print(f"{Fore.CYAN}{message}{Style.RESET_ALL}")


def ok(message):
    print(f"{Fore.GREEN}✅ {message}{Style.RESET_ALL}")


def warn(message):
    print(f"{Fore.YELLOW}⚠️  {message}{Style.RESET_ALL}")


def fail(message):
    print(f"{Fore.RED}❌ {message}{Style.RESET_ALL}")


def print_config(values):
    """
    Print a resolved configuration as a two-column table

    Args:
        values (dict): Flat key-value configuration
    """
    info("🔧 Resolved configuration")
    rows = [[key, values[key]] for key in sorted(values)]
    print(tabulate(rows, headers=["Key", "Value"], tablefmt="simple"))
    print()
