from setuptools import setup, find_packages

setup(
    name="edge-grasp-net",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy>=2.0",
        "scipy>=1.13",
        "torch>=2.4",
        "pandas>=2.2",
        "pydantic>=2.7",
        "pydantic-settings>=2.3",
        "python-dotenv>=1.0",
        "click>=8.1",
        "tenacity>=8.2",
        "cachetools>=5.3",
    ],
    entry_points={"console_scripts": ["edgegrasp = src.cli:main"]},
)
