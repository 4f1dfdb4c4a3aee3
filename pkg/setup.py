#!/usr/bin/env python
# coding: UTF-8


from setuptools import setup

setup(
    name         = 'deepswitch',
    version      = '0.1',
    description  = 'Deep primal-dual bounds for optimal switching',
    packages=['deepswitch',
              'deepswitch.market',
              'deepswitch.problem',
              'deepswitch.nn',
              'deepswitch.dual',
              'deepswitch.primal',
              'deepswitch.oracle',
              'deepswitch.evaluation',
              'deepswitch.utils',
    ],
    package_data = {'deepswitch.oracle': ['fixtures.json']},
    install_requires = ['numpy', 'scipy', 'pandas'],
    extras_require = {'test': ['pytest']},
    entry_points = {'console_scripts': ['deepswitch = deepswitch.cli:main']},
    classifiers = [
    'Development Status :: 4 - Beta',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: MIT License',
    'Operating System :: OS Independent',
    'Programming Language :: Python',
    'Topic :: Scientific/Engineering :: Mathematics',
    ],
    )
