# %% [markdown]
# # Auditing a cloner across severity groups
#
# We build a synthetic manifest where intelligibility gains grow with
# severity, then run the audit through the library and through the CLI.
# Group means are chosen so the delta-WER offsets from the healthy group
# are roughly 0.03, 0.41 and 0.52.

# %%
import tempfile
from pathlib import Path

import numpy as np

from dysfair.cli import main
from dysfair.fairness import audit, disparate_impact, softmax_normalize
from dysfair.manifest import GroupKey, UtteranceRecord, dump_jsonl
from dysfair.report import render_fairness_table, render_key_insights

# %% [markdown]
# ## A synthetic corpus
# Every reference has 100 words. The prompt transcript has some words
# replaced by "xx"; the generated transcript is perfect.

# %%
rng = np.random.default_rng(7)
vocab = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"]
wrong_words = {"healthy": 10, "low": 13, "mid": 51, "high": 62}

records = []
for sev, n_wrong in wrong_words.items():
    for k in range(3):
        words = list(rng.choice(vocab, 100))
        prompt = list(words)
        for i in rng.choice(100, n_wrong, replace=False):
            prompt[i] = "xx"
        records.append(UtteranceRecord(
            utt_id=f"{sev}-{k}", speaker_id=f"{sev}{k}", groups={"severity": sev},
            ref_text=" ".join(words), hyp_prompt_text=" ".join(prompt), hyp_generated_text=" ".join(words),
            simo_precomputed=0.6 - 0.1 * (sev != "healthy"), autopcp=3.0,
        ))

# %% [markdown]
# ## Library audit

# %%
report = audit(records, "severity")
print(render_fairness_table(report))
print(render_key_insights(report))

# %% [markdown]
# ## Why softmax for delta metrics
# Delta metrics can be negative, so a plain ratio of means is meaningless.
# Softmax maps means to positive weights; the ratio of weights reduces to
# exp(baseline mean - group mean), whatever other groups are present.

# %%
means = {GroupKey("severity", "healthy"): 0.10, GroupKey("severity", "mid"): 0.51}
print(softmax_normalize(means))
di = disparate_impact(report.metrics[0], means, GroupKey("severity", "healthy"))
print(di[GroupKey("severity", "mid")], np.exp(0.10 - 0.51))

# %% [markdown]
# ## The same audit through the CLI
# Exit status 3 means at least one cell crossed a threshold.

# %%
with tempfile.TemporaryDirectory() as tmp:
    manifest = Path(tmp) / "demo.jsonl"
    manifest.write_text(dump_jsonl(records), encoding="utf-8")
    status = main(["audit", "--manifest", str(manifest), "--output-format", "csv"])
    print("exit status:", status)
