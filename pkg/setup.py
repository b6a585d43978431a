import io

from setuptools import find_packages, setup

install_requires = ["numpy>=1.17", "scipy", "ujson", "tabulate"]

extras_require = {
    "pandas": ["pandas"],
    "plot": ["matplotlib", "pandas"],
}

with io.open("README.md", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="splitfeas",
    version="0.1.0",
    author="splitfeas developers",
    packages=find_packages(exclude=["tests", "tests.*"]),
    license="Apache License, Version 2.0",
    description="Solvers and convergence certificates for split feasibility problems.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=install_requires,
    extras_require=extras_require,
    tests_require=["pytest"],
    entry_points={"console_scripts": ["splitfeas = splitfeas.console:main"]},
    include_package_data=True,
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
