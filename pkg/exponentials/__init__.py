# Exponential signal model app
