"""
Report generation utilities
"""

import json
from datetime import datetime

from colorama import Fore, Style
from tabulate import tabulate

from src import __version__

MATERIAL_ICONS = {
    "opaque": "📦",
    "specular": "✨",
    "transparent": "🥛",
    "flat_textured": "🃏",
}


class Reporter:
    """Console and JSON rendering of one result document"""

    def __init__(self, result):
        """
        Initialize reporter

        Args:
            result (dict): Report body
        """
        self.result = result
        self.timestamp = datetime.now().isoformat()

    def print_console_report(self):
        raise NotImplementedError

    def _generate_summary(self):
        return {}

    def generate_json_report(self):
        """
        Generate JSON report

        Returns:
            str: JSON document; wall-clock fields live under "timing"
        """
        report = dict(self.result)
        report["summary"] = self._generate_summary()
        report["timing"] = {**report.get("timing", {}), "timestamp": self.timestamp}
        report["fsg_version"] = __version__
        return json.dumps(report, indent=2, sort_keys=True)

    def save_json_report(self, filename):
        """
        Save report to JSON file

        Args:
            filename (str): Output file path
        """
        report = self.generate_json_report()
        with open(filename, "w", encoding="utf-8") as f:
            f.write(report)

    @staticmethod
    def _rule(color, title):
        print(f"\n{color}{'=' * 60}{Style.RESET_ALL}")
        print(f"{color}{title}{Style.RESET_ALL}")
        print(f"{color}{'=' * 60}{Style.RESET_ALL}\n")


class TrainReporter(Reporter):
    """Per-epoch loss table of a training run"""

    def print_console_report(self):
        self._rule(Fore.CYAN, "📉 Training Losses")
        rows = []
        best = self.result.get("best_epoch")
        for entry in self.result["history"]:
            marker = " ⭐" if entry["epoch"] == best else ""
            rows.append([f"{entry['epoch']}{marker}", f"{entry['train_loss']:.6f}", f"{entry['eval_loss']:.6f}"])
        print(tabulate(rows, headers=["Epoch", "Train MSE", "Eval MSE"], tablefmt="simple"))
        print()

        summary = self._generate_summary()
        if summary["reduction"] is not None and summary["reduction"] < 0.1:
            color = Fore.GREEN
        else:
            color = Fore.YELLOW
        print(
            f"{color}Train loss {summary['initial_train_loss']:.6f} -> {summary['final_train_loss']:.6f}; "
            f"best eval {self.result['best_eval_loss']:.6f} at epoch {best}{Style.RESET_ALL}\n"
        )

    def _generate_summary(self):
        history = self.result["history"]
        initial = history[0]["train_loss"]
        final = history[-1]["train_loss"]
        return {
            "epochs": len(history) - 1,
            "initial_train_loss": initial,
            "final_train_loss": final,
            "reduction": final / initial if initial > 0 else None,
        }


class BenchmarkReporter(Reporter):
    """Per-material success table, failure histogram and height errors"""

    def print_console_report(self):
        self._rule(Fore.CYAN, f"🤖 Benchmark Results ({self.result['mode']}, {self.result['n_scenes']} scenes)")

        rows = []
        for material, counts in sorted(self.result["per_material"].items()):
            attempts, successes = counts["attempts"], counts["successes"]
            rate = f"{100.0 * successes / attempts:.1f}%" if attempts else "-"
            rows.append([f"{MATERIAL_ICONS.get(material, '•')} {material}", attempts, successes, rate])
        rows.append(["─" * 20, "─" * 8, "─" * 9, "─" * 6])
        rows.append(["OVERALL", self.result["n_scenes"], self._successes(), f"{100.0 * self.result['overall_rate']:.1f}%"])
        print(tabulate(rows, headers=["Material", "Attempts", "Successes", "Rate"], tablefmt="simple"))
        print()

        failures = self.result["failure_histogram"]
        if failures:
            print(f"{Fore.YELLOW}⚠️  Failure reasons{Style.RESET_ALL}")
            print(tabulate(sorted(failures.items()), headers=["Reason", "Count"], tablefmt="simple"))
            print()

        heights = self.result.get("height_error_mm", {})
        if heights.get("count"):
            print(f"{Fore.CYAN}📏 Height error at the best grasp point{Style.RESET_ALL}")
            table = [[key, f"{heights[key]:.2f}"] for key in ("median", "mean", "p90", "max", "under_20mm")]
            print(tabulate(table, headers=["Statistic", "Value"], tablefmt="simple"))
            print()

        forward_ms = self.result.get("timing", {}).get("mean_forward_ms")
        if forward_ms is not None:
            print(f"{Fore.CYAN}⏱️  Mean forward pass: {forward_ms:.1f} ms{Style.RESET_ALL}\n")

    def _successes(self):
        return sum(counts["successes"] for counts in self.result["per_material"].values())

    def _generate_summary(self):
        rates = {}
        for material, counts in self.result["per_material"].items():
            if counts["attempts"]:
                rates[material] = counts["successes"] / counts["attempts"]
        return {
            "successes": self._successes(),
            "material_rates": rates,
            "median_height_error_mm": self.result.get("height_error_mm", {}).get("median"),
        }
