"""
Точка входа pitchguard: пакетный запуск подкоманд.
Эквивалентно `python -m pitchguard`.

Примеры:
    python main.py synth --seed 1 --out data/
    python main.py gp-sweep --exposure data/exposure.csv --injuries data/injuries.csv --out sweep.json
    python main.py config
"""
import sys

from pitchguard.cli.app import run

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
