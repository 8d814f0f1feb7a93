from setuptools import setup, find_packages

setup(
    name="channeldance-backend",
    version="1.0.0",
    packages=find_packages(where="backend", include=["app", "app.*"]),
    package_dir={"": "backend"},
    install_requires=[
        "fastapi>=0.115.0",
        "uvicorn>=0.30.0",
        "pydantic>=2.8.0",
        "pydantic-settings>=2.3.0",
        "python-dotenv>=1.0.0",
        "numpy>=1.26.0",
        "pandas>=2.2.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "httpx>=0.23.0",
            "black>=23.0.0",
            "ruff>=0.0.260",
        ],
    },
    entry_points={"console_scripts": ["channeldance=app.cli:main"]},
    python_requires=">=3.10",
)
