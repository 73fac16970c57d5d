# Experiment pipeline: dataset -> training -> analysis -> reports
