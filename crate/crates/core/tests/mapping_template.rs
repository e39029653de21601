use std::path::Path;

use antasid::ingest::{convert_text, ColumnMapping};
use antasid::trial::{LevelType, SourceTag};

#[test]
fn shipped_benchmark_template_loads_and_converts() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../mappings/benchmark.example.toml");
    let mapping = ColumnMapping::load(&path).unwrap();
    assert_eq!(mapping.source_tag, SourceTag::BenchmarkControlled);

    let csv = "session,participant,target_type,block,width_px,distance_px,movement_time_ms\n\
               s1,u1,heterogeneous,1,32,256,612\n\
               s1,u1,homogeneous,1,32,256,700\n";
    let out = convert_text(csv, &mapping, true).unwrap();
    assert_eq!(out.dataset.len(), 1);
    assert_eq!(out.filtered, 1);
    let t = &out.dataset.trials[0];
    assert_eq!(t.level_type, LevelType::Heterogeneous);
    assert!((t.movement_time_s - 0.612).abs() < 1e-15);
    assert_eq!(t.amplitude_px, Some(256.0));
}
