from setuptools import setup, find_packages
import os
import pathlib

CURRENT_DIR = pathlib.Path(__file__).parent
README = (CURRENT_DIR / "readme.md").read_text()

env = os.environ.get('source')


def get_dependencies():
    dependency = [
        "numpy>=1.24",
        "pandas>=2.0",
        "SQLAlchemy>=2.0",
        "marshmallow>=3.18",
        "marshmallow-sqlalchemy>=0.29",
        "tqdm",
    ]

    if env and env == "dev":
        return dependency + ["pytest"]

    return dependency + []


setup(
    name='tempgnn',
    version='0.1.0',
    description='Temporal session-graph recommender with quantile time buckets',
    long_description=README,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=["tests", "tests.*"]),
    zip_safe=False,
    include_package_data=True,
    platforms='any',
    python_requires='>=3.10',
    install_requires=get_dependencies(),
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["tempgnn=tempgnn.cli:main"]},
    classifiers=[
        'Intended Audience :: Science/Research',
        'Programming Language :: Python',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ]
)
