# Experiment harness: configs, benchmark runs, reports and management commands
