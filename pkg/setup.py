from setuptools import setup, find_packages

setup(
    name="robustlab",
    version="0.1.0",
    description="Adversarial contrastive learning and common-corruption robustness at desk scale",
    author="",
    author_email="",
    packages=find_packages(include=["robustlab", "robustlab.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "scikit-image>=0.21.0",
        "Pillow>=9.1.0",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0.0",
        "python-dotenv>=1.0.0",
        "click>=8.0.0",
        "tqdm>=4.65.0",
        "jinja2>=3.1.2",
        "PyYAML>=6.0",
    ],
    package_data={
        "robustlab": ["templates/*.j2"],
    },
    entry_points={
        "console_scripts": ["robustlab=robustlab.cli:main"],
    },
)
