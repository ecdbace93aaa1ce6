"""Writes wide_choice_w{4,8,16}.ground: per level one useful method among w decoys."""
import pathlib

DEPTH = 5


def wide_choice(w: int, depth: int = DEPTH) -> str:
    out = [f"# Wide-choice instance: {depth} levels, {w} decoy methods per level."]
    for i in range(depth):
        out.append(f"fact g_{i}")
        out.append(f"fact k_{i}")
    for i in range(depth):
        out.append(f"action a_{i} add: g_{i}")
        for j in range(w):
            out.append(f"action x_{i}_{j} add: k_{i}")
            out.append(f"action y_{i}_{j} del: k_{i}")
    for i in range(depth):
        out.append(f"task L_{i}")
        for j in range(w):
            out.append(f"task X_{i}_{j}")
    for i in range(depth):
        rest = f" L_{i + 1}" if i + 1 < depth else ""
        out.append(f"method useful_{i} L_{i} -> a_{i}{rest}")
        for j in range(w):
            out.append(f"method decoy_{i}_{j} L_{i} -> X_{i}_{j}")
            out.append(f"method decoy_x_{i}_{j} X_{i}_{j} -> x_{i}_{j}")
            out.append(f"method decoy_y_{i}_{j} X_{i}_{j} -> y_{i}_{j}")
    out.append("root L_0")
    out.append("goal " + " ".join(f"g_{i}" for i in range(depth)))
    return "\n".join(out) + "\n"


if __name__ == "__main__":
    here = pathlib.Path(__file__).parent
    for w in (4, 8, 16):
        (here / f"wide_choice_w{w}.ground").write_text(wide_choice(w))
