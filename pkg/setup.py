from setuptools import find_packages, setup

KW = ["graphical models", "score matching", "sparse estimation", "exponential families"]


EXTRA_REQUIREMENTS = {
    "test": ["pytest"],
}


setup(
    name="quasr",
    packages=find_packages(exclude=["docs", "examples", "experiments", "runs", "scripts", "tests"]),
    py_modules=["args", "main_quasr", "quasr_fit", "quasr_simulate", "quasr_experiment"],
    version="0.1.0",
    license="MIT",
    keywords=KW,
    install_requires=[
        "torch>=1.10.0",
        "pytorch-lightning>=1.6.4",
        "tqdm",
        "wandb",
        "scipy>=1.5",
        "scikit-learn",
        "numpy",
        "networkx>=2.6",
        "joblib",
        "threadpoolctl",
    ],
    extras_require=EXTRA_REQUIREMENTS,
    entry_points={"console_scripts": ["quasr=main_quasr:main"]},
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    include_package_data=True,
    zip_safe=False,
)
