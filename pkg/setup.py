"""
DFF Core setuptools setup script
"""

from glob import glob
from setuptools import setup, find_packages


setup(
    name='dff_core',
    version='1.0.0',
    description='DFF Core',
    long_description='Coarse-grained force fields learned from equilibrium '
                     'samples with denoising diffusion models, with '
                     'simulation, sampling, and analysis tools.',
    classifiers=[
    ],
    author='',
    author_email='',
    url='',
    keywords='coarse-graining diffusion-model molecular-dynamics',
    packages=find_packages(exclude=['tests', 'tests.*']),
    include_package_data=True,
    scripts=glob('scripts/*.py'),
    zip_safe=False,
    python_requires='>=3.8',
    extras_require={
        'testing': [
            'pytest >= 3.7.4',
            'pytest-cov',
        ],
    },
    install_requires=[
        'astropy >= 4.2',
        'Flask >= 2.1',
        'marshmallow >= 3.13, < 4',
        'matplotlib >= 3.3',
        'numpy >= 1.20.1',
        'scikit-learn >= 1.1',
        'scipy >= 1.6.1',
        'torch >= 1.12',
        'tqdm >= 4.50',
    ],
    entry_points={
        'console_scripts': [
            'dff = dff_core.cli:main',
        ],
    },
)
