# Undersampling patterns app
