"""Segmentation-free heart-sound (phonocardiogram) classification toolkit."""

__version__ = "0.1.0"

from .dataio import (AudioSample, DatasetManifest, Record, SynthConfig, label_unlabeled_by_patient,
                     load_manifest, read_wav, relabel_extrasys_to_normal, synth_pcg, synthesize,
                     write_wav)
from .envelope import envelope, find_peaks, peak_features, shannon_energy
from .features import FeatureConfig, extract_full_vector
from .metrics import discriminant_power, total_precision, youden
from .preprocess import DenoisePolicy, denoise, normalize_center, preprocess_pipeline
from .wavelet import dwt, idwt

__all__ = [
    "AudioSample", "DatasetManifest", "Record", "SynthConfig", "label_unlabeled_by_patient",
    "load_manifest", "read_wav", "relabel_extrasys_to_normal", "synth_pcg", "synthesize",
    "write_wav", "envelope", "find_peaks", "peak_features", "shannon_energy", "FeatureConfig",
    "extract_full_vector", "discriminant_power", "total_precision", "youden", "DenoisePolicy",
    "denoise", "normalize_center", "preprocess_pipeline", "dwt", "idwt",
]
