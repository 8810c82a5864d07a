#!/usr/bin/env python
"""Django's command-line utility; the vsmargin subcommands are available here too."""
from vsmargin.cli import main

if __name__ == "__main__":
    main()
