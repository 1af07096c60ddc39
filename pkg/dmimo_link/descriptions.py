# Description constants (kept separate for clarity / reuse)

PROGRAM_DESC = "Monte Carlo link-level simulator for diffusive molecular MIMO with decision-feedback receivers"

MSE_SWEEP_DESC = "Channel-estimation MSE of the ML and LS estimators against the Cramér-Rao bound vs. training length"
BER_SWEEP_DESC = "Bit error rate of the ZF/MMSE/LS decision-feedback receivers along one sweep axis"
BLOCK_PROTOCOL_DESC = "Block-type transmission with training prefix and mobile transceivers: BER, packet error rate and efficiency"
THRESHOLD_SEARCH_DESC = "Grid search for the comparator threshold that minimizes BER"
INTERFERENCE_SWEEP_DESC = "Maximum normalized mean interference vs. gate spacing for each release-offset mode"
DESIGN_TRAINING_DESC = "Search the training sequences that minimize the Cramér-Rao bound and write them as 0/1 text"

CONFIG_HELP = "flat KEY=value config file (SI units); defaults reproduce the reference 2x2 setting"
SEED_HELP = "master seed; every trial draws from a stream derived from (seed, point, trial)"
OUT_HELP = "output path (CSV, or 0/1 text for design-training)"
TRIALS_HELP = "trials per batch (BER sweeps keep adding batches until the confidence rule or TRIAL_CAP)"
DETECTOR_HELP = "restrict decoding to one detector"
WORKERS_HELP = "worker processes for trials; results do not depend on it"

# CSV columns, listed in the CLI help epilog
COLUMN_DESCRIPTIONS = {
    "mse_ml_db": "10·log10 of the mean ‖Ĉ−C̄‖² of the ML estimator",
    "mse_ls_db": "10·log10 of the mean ‖Ĉ−C̄‖² of the clipped LS estimator",
    "crb_db": "bound on ‖Ĉ−C̄‖² when every receiver row is estimated on its own",
    "crb_pooled_db": "trace of the inverse of the Fisher matrix pooled over receivers",
    "ber_<detector>": "payload bit error rate",
    "ber_<detector>_lo/hi": "95% Wilson interval of the BER",
    "per_<detector>": "packet error rate P_s (a packet fails on any payload bit error)",
    "eta_<detector>": "efficiency (B−K_tot)/B·(1−P_s)",
    "metric": "maximum normalized mean interference",
    "trials": "trials simulated at this point",
    "failures": "trials that could not estimate or equalize",
}

COLUMNS_EPILOG = "CSV columns:\n" + "\n".join(f"  {name:<22} {text}" for name, text in COLUMN_DESCRIPTIONS.items())
