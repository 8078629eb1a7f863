# Alternating block pipeline: plug-in stages interleaved with the exact optimizer
