"""Exit times of trapped drift-diffusions: grid, radial and Monte Carlo solvers"""
