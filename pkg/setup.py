from setuptools import setup


setup(name='bearingsim',
      version='0.1.0',
      description='Bearing-based leader-follower formation tracking with sliding-mode control laws',
      py_modules=['errors', 'formation', 'localization', 'controllers', 'metrics', 'integrator',
                  'analysis', 'IO_scenario', 'IO_trace', 'plotting', 'bearingsim'],
      data_files=[('scenarios', ['scenarios/sim1.yaml', 'scenarios/sim2.yaml'])],
      python_requires='>=3.7',
      install_requires=['numpy', 'scipy', 'h5py', 'matplotlib', 'PyYAML'],
      entry_points={'console_scripts': ['bearingsim = bearingsim:main']})
