"""Setup configuration for the mrgark CLI."""

from setuptools import setup, find_packages

setup(
    name="mrgark",
    version="0.1.0",
    packages=find_packages(include=["src*"]),
    include_package_data=True,
    install_requires=[
        "pydantic>=2.5.0",
        "typer>=0.9.0",
        "rich>=13.7.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
    ],
    extras_require={
        "dev": ["pytest>=7.4.0"],
    },
    entry_points={
        "console_scripts": [
            "mrgark=src.cli.commands:main",
        ],
    },
    python_requires=">=3.10",
    description="Multirate GARK schemes: construction, order, stability, monotonicity and integration",
)
