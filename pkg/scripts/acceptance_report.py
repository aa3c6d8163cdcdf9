"""Run the acceptance suite and print only its per-criterion lines."""
import subprocess
import sys


def main():
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "tests/test_acceptance.py"],
                          capture_output=True, text=True)
    for line in proc.stdout.splitlines():
        if line.startswith("ACCEPT"):
            print(line)
    print(proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
