from setuptools import setup

with open("README.md") as f:
    readme = f.read()

dependencies = [
    "Jinja2",
    "decorator",
    "jsonschema",
    "numpy>=1.22",
    "pytest>=7.0.0",
    "pyyaml",
    "regex",
    "scipy>=1.8",
    "tomlkit>=0.11",
]

setup(
    name="fracbq",
    version="0.1.0",
    description="Pseudo-spectral mild solutions of the forced fractional Boussinesq system, with a verification suite",
    long_description=readme,
    long_description_content_type="text/markdown",
    license="MIT",
    packages=["fracbq"],
    entry_points={
        "console_scripts": ["fracbq = fracbq.cli:console_entry"],
        # the following makes the scenario collector available to pytest
        "pytest11": ["fracbq-scenarios = fracbq.collect"],
    },
    install_requires=dependencies,
    python_requires=">=3.8",
    package_data={
        "fracbq": ["py.typed", "config_schema.json", "scenario_schema.json"],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Typing :: Typed",
    ],
)
