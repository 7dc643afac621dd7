import json, sys, time
from kfrl import core, rl

mode = sys.argv[1]
seeds = [int(x) for x in sys.argv[2:]]
for s in seeds:
    cfg = core.make_config("liquid", seed=s)
    t0 = time.time()
    report, learner = rl.run_training(cfg, mode, 30000)
    rates = [e.intervention_rate for e in report.episodes]
    k = max(1, len(rates)//10)
    row = {
        "mode": mode, "seed": s,
        "eval_success": report.eval_success,
        "first_tenth": sum(rates[:k])/k,
        "last_tenth": sum(rates[-k:])/k,
        "wall_s": round(time.time()-t0, 1),
    }
    with open(f"/root/pkg/matrix/{mode}_{s}.json", "w") as f:
        json.dump(row, f)
    print(json.dumps(row), flush=True)
