# Core utilities: exceptions, data containers, RNG and FFT helpers
