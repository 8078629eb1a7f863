"""
Management command to synthesize ground-truth data in the CPLX container.

Datasets:
- exponential: a tabulated or random 1D signal (truth.cplx, plus noisy.cplx with --noise-scale)
- spectrum2d: 2D spectrum with Lorentzian direct-dimension lines (spectrum.cplx)
- kspace: multi-coil Gaussian-blob phantom k-space (kspace.cplx)

Usage:
    python manage.py synth --signal S2 --noise-scale 0.03 --seed 1 --out data/s2
    python manage.py synth --dataset kspace --size 64 --coils 2 --out data/phantom
"""
from pathlib import Path

import numpy as np
from django.conf import settings

from core.formats import write_cplx
from core.rng import make_rng
from exponentials.domain import NoiseKind, NoiseSpec, TrainingRanges
from exponentials.services import add_noise, sample_training_model, synthesize, table_signal
from recon.services import coil_phantom, synthetic_spectrum2d
from ._base import ReconCommand


class Command(ReconCommand):
    help = 'Synthesize exponential signals, 2D spectra or phantom k-space as CPLX files'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--dataset', choices=['exponential', 'spectrum2d', 'kspace'], default='exponential')
        parser.add_argument('--signal', choices=['S1', 'S2', 'random'], default='S2',
                            help='Tabulated signal or a random draw (default: S2)')
        parser.add_argument('--length', type=int, default=255, help='Length of random signals (default: 255)')
        parser.add_argument('--noise-kind', choices=NoiseKind.values, default=NoiseKind.GAUSSIAN)
        parser.add_argument('--noise-scale', type=float, default=0.0)
        parser.add_argument('--direct-dim', type=int, default=32, help='Direct dimension of 2D spectra (default: 32)')
        parser.add_argument('--size', type=int, default=64, help='Phantom matrix size (default: 64)')
        parser.add_argument('--coils', type=int, default=2, help='Phantom coil count (default: 2)')
        parser.add_argument('--contrast', type=float, default=1.0, help='Phantom contrast exponent (default: 1.0)')

    def run(self, **options):
        out_dir = Path(options['out'] or Path(settings.RECON_OUTPUT_DIR) / 'synth')
        seed = options['seed'] or 0
        dataset = options['dataset']

        if dataset == 'kspace':
            volume = coil_phantom(options['size'], options['size'], options['coils'], seed=seed,
                                  contrast=options['contrast'])
            self._write(out_dir / 'kspace.cplx', volume.data)
            return

        model = self._model(options['signal'], options['length'], seed)
        if dataset == 'spectrum2d':
            centers = np.linspace(0.15, 0.85, model.peak_count) * options['direct_dim']
            spectrum = synthetic_spectrum2d(options['direct_dim'], model, direct_centers=centers)
            self._write(out_dir / 'spectrum.cplx', spectrum.data)
            return

        truth = synthesize(model)
        self._write(out_dir / 'truth.cplx', truth)
        if options['noise_scale'] > 0:
            noise = NoiseSpec(kind=options['noise_kind'], scale=options['noise_scale'], seed=seed)
            self._write(out_dir / 'noisy.cplx', add_noise(truth, noise))

    def _model(self, signal, length, seed):
        if signal == 'random':
            return sample_training_model(TrainingRanges(length=length), make_rng(seed))
        return table_signal(signal)

    def _write(self, path, data):
        write_cplx(path, data)
        self.success(f'Wrote {path} {tuple(np.shape(data))}')
