#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ebm_aml::cohort::{export_final, FinalTables};
use ebm_aml::ebm::{train, EbmModel, TrainConfig};
use ebm_aml::eval::ModelSet;
use ebm_aml::synth;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub tables: FinalTables,
    pub clin_mut: EbmModel,
    pub exp: EbmModel,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

/// Final tables and two trained models, saved next to a service config.
pub fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let cohort = synth::synthetic_cohort(200, 20, 21);
    let tables = export_final(&cohort, &["TP53", "PHF6", "FLT3", "NPM1"], &cohort.expression_genes[..8]).unwrap();
    tables.write_dir(&dir.path().join("tables")).unwrap();
    let cfg = TrainConfig { outer_bags: 2, max_rounds: 800, ..TrainConfig::default() };
    let clin_mut = train(&ModelSet::ClinMut.table(&tables).unwrap(), &cfg).unwrap();
    let exp = train(&ModelSet::Exp.table(&tables).unwrap(), &cfg).unwrap();
    std::fs::create_dir_all(dir.path().join("models")).unwrap();
    clin_mut.save(&dir.path().join("models/clin_mut.json")).unwrap();
    exp.save(&dir.path().join("models/exp.json")).unwrap();
    std::fs::write(
        dir.path().join("service.kv"),
        "bind = 127.0.0.1:0\nmax_body_bytes = 4096\nmodel.clin_mut = models/clin_mut.json\nmodel.exp = models/exp.json\n",
    )
    .unwrap();
    Fixture { dir, tables, clin_mut, exp }
}

/// Five patients: two complete, one elderly, one without mutations, one
/// with an unseen cytogenetic category.
pub const PATIENTS_CSV: &str = "\
sample_id,diagnosis_age,bm_blast_pct,mutation_count,pb_blast_pct,wbc,gender,race_white,cytogenetic_info,eln_risk,treatment_intensity,TP53,PHF6,FLT3,NPM1
pt1,45,60,2,30,12.5,female,1,normal,favorable,regular,0,0,1,1
pt2,67,85,4,70,80,male,0,complex,adverse,high-intensity,1,0,0,0
pt3,81,40,1,10,3.2,male,1,normal,intermediate,low-intensity,0,1,0,0
pt4,55,50,0,20,9,female,1,inv(16),favorable,target,,,,
pt5,38,95,3,90,140,male,1,t(9;11),adverse,regular,0,0,1,0
";

pub fn write_patients(dir: &Path) -> PathBuf {
    let p = dir.join("patients.csv");
    std::fs::write(&p, PATIENTS_CSV).unwrap();
    p
}
