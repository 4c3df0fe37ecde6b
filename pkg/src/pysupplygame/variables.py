BOUND_LABELS = {
    "etc-supplier": "((1-E[C])/(E[P]L) + 2) T^(-1/2)",
    "etc-retailer": "(1/L + 2) T^(-1/2)",
    "etc-last-iterate": "(1/(E[P]L) + 1) T^(-1/2)",
    "lipschitz-simple": "9M log2(Mt)/t",
    "lipschitz-average": "2M ln(4T)/T",
    "etc-ftl-supplier": "(16 + (1-E[C])/(E[P]L) + 7 sqrt(ln T)) T^(-1/3)",
    "exp3vi": "eta K T ln(eK/gamma) + 4 ln(K+1)/eta + 4 gamma T",
    "exp3vi-tuned": "3 (4 + 3 ln T) T^(2/3)",
}

EVENT_TEXTS = {
    "job.finished": "[{mode}] T={horizon} seed={seed}: regret={regret:.6g} (bound {bound:.6g})",
    "job.failed": "[{mode}] T={horizon} seed={seed} failed: {reason}",
    "horizon.finished": "[{mode}] T={horizon}: {count} runs, mean regret {mean:.6g}, compliance {compliance:.3f}",
    "run.finished": "[{mode}] run finished: {count} jobs written to {output_dir}",
}

SUMMARY_HEADER = "{horizon:>10} {count:>6} {mean:>14} {std:>14} {min:>14} {max:>14} {bound:>14} {compliance:>11}"
