import json, sys
# Regenerates eleven_room_synthetic.json: python3 eleven_room_synthetic.py > eleven_room_synthetic.json
B, H, Ad = 3e-5, 0.0015, 1e-5
n = 11; Tenv = 10.0
# rooms on a 2-row floor plan; neighbours share a wall
walls = [(i, i+1) for i in range(n-1) if i != 4] + [(0,5),(1,6),(2,7),(3,8),(4,9),(4,10)]
A = [[0.0]*n for _ in range(n)]
for i, j in walls:
    for a, b in ((i, j), (j, i)):
        A[a][b] += Ad; A[a][a] -= Ad
for i in range(n):
    A[i][i] -= B * (1 + 0.05 * (i % 3))
c = [B * (1 + 0.05 * (i % 3)) * Tenv for i in range(n)]
acts = []
for i in range(n):
    Ai = [[0.0]*n for _ in range(n)]
    ci = [0.0]*n; ci[i] = H * (1 - 0.04 * (i % 4))
    acts.append({"A": Ai, "c": [round(v, 9) for v in ci]})
cfg = {
  "name": "eleven_room_synthetic",
  "description": "Synthetic eleven-room house: rooms 1-5 and 6-11 as components, at most 2 heaters on per component and 4 overall; tau = 15 min",
  "system": {
    "split": [5, 6],
    "modes": [{"actuators": 5}, {"actuators": 6}],
    "constraints": {"global_max_active": 4, "per_component_max_active": [2, 2]},
    "continuous": {
      "tau_s": 900, "discretization": "component_hold",
      "base": {"A": [[round(v, 9) for v in r] for r in A], "c": [round(v, 9) for v in c]},
      "actuators": acts,
      "offset_sensitivity": [round(B * (1 + 0.05 * (i % 3)), 9) for i in range(n)]
    }
  },
  "R": [[18, 22]] * n,
  "synthesis": {"mode": "distributed", "K": 4, "D": 1, "epsilon": 0.5, "eta": 0.1,
                "max_rings": 15, "extension": "lower"},
  "runtime": {"x0": [[17.5]*5 + [17.8]*6, [18.5, 21, 17.9, 20, 19]+[21.5, 18.2, 19, 20, 17.6, 21]], "max_steps": 200}
}
json.dump(cfg, sys.stdout, indent=1)
