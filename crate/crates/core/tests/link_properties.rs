use proptest::prelude::*;
use vrtraffic::dist::reference::REFERENCE_MODELS;
use vrtraffic::dist::Model;
use vrtraffic::frames::{identify_frames, AnalyzerConfig};
use vrtraffic::gen::{generate_trace, TrafficModel};
use vrtraffic::linksim::{simulate_link, LinkConfig, ACK_LEN};
use vrtraffic::metrics::summarize;
use vrtraffic::trace::{Direction, PacketRecord, PacketTrace};

/// Bursts of MTU-sized packets with a remainder, like a video flow.
fn arb_video() -> impl Strategy<Value = PacketTrace> {
    prop::collection::vec((0u64..40_000, 1usize..60, 1u32..1514), 1..60).prop_map(|bursts| {
        let mut t = 0;
        let mut packets = Vec::new();
        for (gap, n, rem) in bursts {
            t += gap;
            packets.extend(std::iter::repeat_n(PacketRecord::downlink(t, 9000, 54321, 1514), n));
            packets.push(PacketRecord::downlink(t, 9000, 54321, rem));
        }
        PacketTrace::new(packets)
    })
}

fn cfg(capacity_mbps: f64, queue_kib: u64) -> LinkConfig {
    LinkConfig { capacity_mbps, queue_limit: queue_kib * 1024, ..LinkConfig::default() }
}

proptest! {
    #[test]
    fn conservation_order_and_delay_bound(trace in arb_video(), cap in 5.0f64..200.0, q in 2u64..300) {
        let c = cfg(cap, q);
        let sim = simulate_link(&trace, &c).unwrap();
        prop_assert_eq!(sim.delivered_count() + sim.dropped_packets, trace.len());
        let mut last = 0;
        for f in &sim.fates {
            let Some(a) = f.arrival_ns else { continue };
            let p = &trace.packets[f.index];
            prop_assert!(a >= last, "FIFO violated at {}", f.index);
            last = a;
            prop_assert!(a >= p.ts * 1000 + c.serialization_ns(p.length) + c.base_owd * 1000);
        }
        let delivered: Vec<&PacketRecord> = sim.delivered.packets.iter().filter(|p| p.direction == Direction::Downlink).collect();
        prop_assert_eq!(delivered.len(), sim.delivered_count());
        prop_assert!(sim.acks.iter().all(|a| a.length == ACK_LEN && a.direction == Direction::Uplink));
        prop_assert_eq!(sim.capture.len(), trace.len() + sim.acks.len());
    }

    #[test]
    fn queue_holding_the_whole_trace_never_drops(trace in arb_video(), cap in 1.0f64..50.0) {
        let total: u64 = trace.packets.iter().map(|p| u64::from(p.length)).sum();
        let c = LinkConfig { capacity_mbps: cap, queue_limit: total.max(1514), ..LinkConfig::default() };
        let sim = simulate_link(&trace, &c).unwrap();
        prop_assert_eq!(sim.dropped_packets, 0);
        prop_assert_eq!(sim.acks.len(), trace.packets.chunk_by(|a, b| a.ts == b.ts).count());
    }
}

// Tail drop is not monotone in general: a drop at the slower rate can make
// room for a later packet the faster link would also have dropped. Over a
// periodic frame stream, where each frame either fits or does not, it is.
fn periodic_stream(frame_bytes: u32, frames: u64) -> PacketTrace {
    let mut packets = Vec::new();
    for i in 0..frames {
        let t = (i * 1_000_000 + 45) / 90;
        packets.extend(std::iter::repeat_n(PacketRecord::downlink(t, 9000, 54321, 1514), (frame_bytes / 1514) as usize));
        packets.push(PacketRecord::downlink(t, 9000, 54321, frame_bytes % 1514 + 1));
    }
    PacketTrace::new(packets)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn degradation_is_monotone_in_capacity(
        frame_bytes in 20_000u32..90_000,
        mut caps in prop::collection::vec(10.0f64..120.0, 2..5),
        q in 128u64..512,
    ) {
        let trace = periodic_stream(frame_bytes, 300);
        caps.sort_by(f64::total_cmp);
        let sims: Vec<_> = caps.iter().map(|&c| simulate_link(&trace, &cfg(c, q)).unwrap()).collect();
        for (w, c) in sims.windows(2).zip(caps.windows(2)) {
            prop_assert!(w[0].dropped_packets >= w[1].dropped_packets, "drops at {:?}: {} vs {}", c, w[0].dropped_packets, w[1].dropped_packets);
            prop_assert!(w[0].mean_delay_us().unwrap() >= w[1].mean_delay_us().unwrap());
        }
    }
}

#[test]
fn closed_loop_at_generous_capacity() {
    for (i, row) in REFERENCE_MODELS.iter().enumerate().step_by(3) {
        let model = TrafficModel::new(row.size, row.iat, 30.0, i as u64);
        let trace = generate_trace(&model).unwrap();
        let sim = simulate_link(&trace, &LinkConfig::with_capacity(10_000.0)).unwrap();
        let analyzer = AnalyzerConfig::default();
        let report = summarize(&sim.capture, &analyzer).unwrap();
        let iat: Model = row.iat.into();
        let mean_ms = {
            let xs = vrtraffic::dist::sample(&iat, 200_000, 99);
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        assert_eq!(report.frame_loss_rate, 0.0, "{}", row.key());
        let err = (report.avg_inter_arrival - mean_ms).abs() / mean_ms;
        assert!(err < 0.02, "{}: {} ms vs model {mean_ms}", row.key(), report.avg_inter_arrival);

        // each frame's ACK returns one round trip after its last byte
        let frames = identify_frames(&trace.packets, &analyzer).unwrap();
        let rtt = 2.0 * LinkConfig::default().base_owd as f64 / 1000.0;
        let span = frames.frames.iter().map(|f| (f.last_tx - f.first_tx) as f64).sum::<f64>() / frames.len() as f64 / 1000.0;
        let lat = report.avg_frame_latency.unwrap();
        assert!(lat >= rtt + span && lat < rtt + span + 0.2, "{}: latency {lat}", row.key());
    }
}
