//! Shared fixtures for the benchmarks: one desk-scale frame with both AMP
//! and oracle slot lists.

use ndarray::Array2;
use num_complex::Complex64;
use ura_core::channel::stack_beam_channels;
use ura_core::cs::{process_slot, synthesize_slot, CsSlotOutput};
use ura_core::rng::{stream_rng, Stream};
use ura_core::tree_code::tree_encode;
use ura_core::{Message, Result, SystemConfig, SystemSetup};

pub struct Frame {
    pub setup: SystemSetup,
    pub ys: Vec<Array2<Complex64>>,
    pub amp_slots: Vec<CsSlotOutput>,
    pub oracle_slots: Vec<CsSlotOutput>,
    pub noise_var: f64,
}

pub fn desk_config() -> SystemConfig {
    "channel.n_r = 64\n\
     channel.n_rf = 8\n\
     code.data = 8, 3*12, 0*3\n\
     code.parity = 0, 5*12, 8*3\n\
     cs.l_p = 100\n\
     sim.noise = snr"
        .parse()
        .expect("desk config")
}

pub fn desk_frame(ka: usize, snr_db: f64, seed: u64) -> Result<Frame> {
    let setup = SystemSetup::new(desk_config())?;
    let noise_var = setup.noise_var(snr_db);
    let mut rng = stream_rng(seed, Stream::Messages);
    let coded: Vec<Vec<u32>> = (0..ka)
        .map(|_| {
            let m = Message::random(setup.profile.total_bits(), &mut rng);
            tree_encode(&m, &setup.profile, &setup.matrices).map(|c| c.indices)
        })
        .collect::<Result<_>>()?;
    let mut ch_rng = stream_rng(seed, Stream::Channels);
    let channels: Vec<_> = (0..ka).map(|_| setup.model.draw(&mut ch_rng)).collect();
    let h = stack_beam_channels(&channels, setup.config.channel.n_rf);
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let (mut ys, mut amp_slots, mut oracle_slots) = (Vec::new(), Vec::new(), Vec::new());
    for s in 0..setup.profile.stages() {
        let sent: Vec<u32> = coded.iter().map(|c| c[s]).collect();
        let y = synthesize_slot(&sent, &h, &setup.codebook, noise_var, &mut noise_rng)?;
        amp_slots.push(process_slot(&y, &setup.codebook, &setup.config.cs)?);
        oracle_slots.push(CsSlotOutput::oracle(&sent, &h, None)?);
        ys.push(y);
    }
    Ok(Frame {
        setup,
        ys,
        amp_slots,
        oracle_slots,
        noise_var,
    })
}
