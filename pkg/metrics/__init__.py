# Reconstruction quality and distribution-mismatch measures
