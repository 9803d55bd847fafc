from setuptools import setup

setup(
    name="persuasion-equilibria",
    version="0.1.0",
    description="Symmetric equilibria of competitive Bayesian persuasion",
    package_dir={"persuasion": "."},
    packages=[
        "persuasion",
        "persuasion.cli",
        "persuasion.core",
        "persuasion.model",
        "persuasion.service",
        "persuasion.utils",
    ],
    install_requires=[],  # rely on pyproject or external requirements
    entry_points={"console_scripts": ["persuasion = persuasion.main:main"]},
    python_requires=">=3.10",
)
