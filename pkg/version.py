#!/usr/bin/env python3
# version.py - Application version information
"""
Application version information.
This file is used by setup.py and by `densops --version`.
"""

# Version information
VERSION = "0.1.0"
VERSION_INFO = (0, 1, 0)

# Application metadata
APP_NAME = "densops"
APP_DESCRIPTION = "Symbolic checks for differential operators on densities"
APP_AUTHOR = "densops developers"

def get_version():
    """Get the current version string."""
    return VERSION

def get_version_info():
    """Get the current version as a tuple."""
    return VERSION_INFO
