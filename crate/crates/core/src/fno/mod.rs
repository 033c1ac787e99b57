//! Fourier neural operator: lift, four Fourier layers, two-layer projection head.

pub mod checkpoint;
pub mod model;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint};
pub use model::{
    fno_backward, fno_forward, fno_init, fno_predict, FnoArch, FnoCache, FnoParams, FourierLayer, FOURIER_LAYERS,
    IN_CHANNELS, OUT_CHANNELS,
};
