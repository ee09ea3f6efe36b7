#!/usr/bin/env python3

import sys
from pathlib import Path

# Adiciona o diretório do projeto ao Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from app.cli import run_cli


def main():
    """Ponto de entrada da CLI (train, eval, sweep, trace, compare, coverage, serve)"""
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
