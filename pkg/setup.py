from setuptools import setup, find_packages

version = {}
with open("src/spinspectra/_version.py") as fp:
    exec(fp.read(), version)

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="spinspectra",
    version=version['__version__'],
    author="spinspectra Contributors",
    description="NMR spectral functions of spin-1/2 molecules from exact and cluster-based diagonalization.",
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages("src"),
    package_dir={'': 'src'},
    zip_safe=False,
    extras_require={"test": ["pytest>=6.0"]},
    entry_points={
        'console_scripts': ['spinspectra=spinspectra._cli_argv:cli_argv'],
    },
    python_requires=">=3.8",
    install_requires=['scipy>=1.6', 'numpy', 'networkx', 'matplotlib', 'typer', 'click', 'tqdm'],
)
