"""
v2nrx
=====

Link-level simulator for a single-antenna-vehicle, two-antenna-base-station
OFDM uplink, with a conventional receiver (LS estimation, MMSE combining,
exact soft demapping, LDPC decoding) and a transformer neural receiver
trained end-to-end on BCE.

Submodules
----------
ldpc        regular (3,6) PEG LDPC code, alist I/O, encoder, min-sum decoder
mapping     Gray QAM mapping and exact / max-log LLR demapping
ofdm        resource grid, pilots, OFDM modulation, per-RE channel application
channel     Rayleigh TDL channel with Jakes Doppler, Eb/N0 conversion
baseline    LS estimation, interpolation, MMSE equalization, full chain
autodiff    reverse-mode autodiff, attention, BCE, AdamW, gradient checking
neural      neural receiver model, training, checkpoints
payload     image/audio/GPS/LiDAR/radar codecs, framing, PSNR/MSE/RMSE
harness     config files, BER / architecture / payload experiments
"""

from .baseline import baseline_receive
from .channel import ChannelConfig, doppler_freq, ebno_to_noise_var, generate_channel
from .ldpc import build_parity_matrix, ldpc_decode, ldpc_encode, load_parity_matrix
from .mapping import hard_decision, qam_demap_llr, qam_map
from .neural import NeuralReceiverConfig, build_model, load_checkpoint, nr_forward, save_checkpoint, train
from .ofdm import FrameConfig, apply_channel_freq, build_grid, ofdm_demodulate, ofdm_modulate

__version__ = "0.1.0"
