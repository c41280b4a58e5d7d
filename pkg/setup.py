from setuptools import setup, find_packages

setup(
    name='alloframe',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    package_data={'alloframe.prompting': ['templates/v1/*.txt']},
    description='Allocentric spatial question answering over calibrated multi-view scenes',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    license='MIT',
    install_requires=[
        'numpy>=1.26.4',
        'pandas>=2.2.2',
        'requests>=2.31.0',
        'plotly>=5.22.0',
        'scikit-learn>=1.4.2',
        'scipy>=1.11.0',
        'Pillow>=10.0.0'
    ],
    entry_points={
        'console_scripts': ['alloframe=alloframe.cli:main'],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.10',
    ],
    python_requires='>=3.10',
)
