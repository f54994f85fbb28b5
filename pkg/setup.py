from setuptools import find_packages
from setuptools import setup

LIBRARY = "heed"

__version__ = "notset"
with open(f"{LIBRARY}/version.py", mode="r") as v:
    vers = v.read()
exec(vers)  # nosec

with open("README.md", mode="r", encoding="UTF8") as rm:
    long_description = rm.read()

try:
    with open("requirements.txt", "r") as f:
        required = f.read().splitlines()
except:
    with open(f"{LIBRARY}.egg-info/requires.txt", "r") as f:
        required = f.read().splitlines()

setup_config = {
    "name": LIBRARY,
    "version": __version__,
    "description": "Language-conditioned visuomotor policies with task-focused attention",
    "long_description": long_description,
    "long_description_content_type": "text/markdown",
    "packages": find_packages(include=[LIBRARY, f"{LIBRARY}.*"]),
    "install_requires": required,
    "extras_require": {"vgg": ["torchvision"]},
    "entry_points": {"console_scripts": ["heed=heed.cli:main"]},
    "python_requires": ">=3.10",
}

setup(**setup_config)
