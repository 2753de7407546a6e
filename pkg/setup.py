#!/usr/bin/env python

from os.path import abspath, dirname, join
from setuptools import setup
from sys import path as sys_path

deps = [
    "numpy>=1.20",
    "scipy>=1.6",
    "pandas>=1.4",
    "statsmodels>=0.13",
]
packages = [
    "termsv",
    "termsv_cli",
]

srcdir = join(dirname(abspath(__file__)), "src/")
sys_path.insert(0, srcdir)

setup(name="termsv",
      version="0.4.0",
      description="termsv is a command-line utility that fits dynamic "
                  "Nelson-Siegel and Svensson factor models with Wishart "
                  "stochastic volatility to futures term structures.",
      license="Simplified BSD",
      packages=packages,
      package_dir={ "": "src" },
      entry_points={
          "console_scripts": ["termsv=termsv_cli.main:main"]
      },
      install_requires=deps,
      python_requires=">=3.8",
      test_suite="tests",
      classifiers=["Development Status :: 4 - Beta",
                   "Environment :: Console",
                   "Intended Audience :: Financial and Insurance Industry",
                   "Intended Audience :: Science/Research",
                   "Operating System :: POSIX",
                   "Programming Language :: Python :: 3",
                   "Topic :: Office/Business :: Financial",
                   "Topic :: Scientific/Engineering :: Mathematics"]
)
