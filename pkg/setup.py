#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages


long_description = (
    open('README.md').read()
)

version = '0.1.0'


setup(
    name='sphere-superres',
    description=(
        'Recovery of positive streams of Diracs on the sphere from '
        'low-degree spherical harmonic measurements.'
    ),
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='MIT',
    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
    version=version,
    python_requires='>=3.8',
    install_requires=[
        'Django>=4.0',
        'numpy>=1.20',
        'scipy>=1.9',
        'matplotlib>=3.5',
    ],
    entry_points={
        'console_scripts': [
            'sphere-superres=sphere_superres.cli:main',
        ],
    },
    classifiers=[
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: Implementation :: CPython',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Framework :: Django',
    ],
    zip_safe=False,
)
