//! Learning stack for fracture prediction: a small reverse-mode autodiff
//! engine, the latent-attention encoder-decoder, deck embeddings and the
//! training loop.

pub mod autodiff;
pub mod embed;
pub mod model;
pub mod train;
