from setuptools import setup

setup(name='ambient_gym',
      version='0.1.0',
      packages=['ambient_gym', 'ambient_gym.calculus', 'ambient_gym.envs', 'ambient_gym.envs.data'],
      package_data={'ambient_gym.envs.data': ['*.ba']},
      include_package_data=True,
      install_requires=['gym', 'numpy', 'networkx', 'graphviz'],
      extras_require={'test': ['pytest', 'hypothesis']},
      entry_points={'console_scripts': ['bioamb=ambient_gym.cli:main']},
)
