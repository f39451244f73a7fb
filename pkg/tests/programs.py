"""Random program text for property tests."""
from hypothesis import strategies as st

CMP = ["==", "!=", "<", "<=", ">", ">="]


@st.composite
def program_texts(draw, max_vars=3, max_rules=8, max_inputs=4):
    k = draw(st.integers(1, max_inputs))
    inputs = [f"i{a}" for a in range(k)]
    n_vars = draw(st.integers(0, max_vars))
    names = [f"v{i}" for i in range(n_vars)]
    lines = [f"inputs: {' '.join(inputs)}", "outputs: p q r"]
    for name in names:
        lo = draw(st.integers(-5, 2))
        hi = draw(st.integers(lo, lo + 8))
        init = draw(st.integers(lo, hi))
        lines.append(f"var {name} {lo}..{hi} = {init}")
    if draw(st.booleans()):
        lines.append("wrap")

    def term():
        if names and draw(st.booleans()):
            return draw(st.sampled_from(names))
        return str(draw(st.integers(0, 6)))

    def arith(depth=0):
        if depth > 1 or draw(st.booleans()):
            t = term()
            return f"-{t}" if draw(st.integers(0, 5)) == 0 else t
        op = draw(st.sampled_from(["+", "-", "*"]))
        return f"({arith(depth + 1)} {op} {arith(depth + 1)})"

    def guard(depth=0):
        choice = draw(st.integers(0, 5 if depth < 2 else 2))
        if choice == 0:
            return f"in {draw(st.sampled_from(['==', '!=']))} {draw(st.sampled_from(inputs))}"
        if choice in (1, 2):
            return f"{arith()} {draw(st.sampled_from(CMP))} {arith()}"
        if choice == 3:
            return f"!({guard(depth + 1)})"
        if choice == 4:
            return "true" if draw(st.booleans()) else "false"
        return f"({guard(depth + 1)} {draw(st.sampled_from(['&&', '||']))} {guard(depth + 1)})"

    used_errors = set()
    for _ in range(draw(st.integers(0, max_rules))):
        assigns = []
        if names:
            for name in draw(st.lists(st.sampled_from(names), max_size=2, unique=True)):
                assigns.append(f"{name} := {arith()}")
        if draw(st.integers(0, 4)) == 0:
            err = draw(st.integers(1, 20).filter(lambda e: e not in used_errors))
            used_errors.add(err)
            action = f"error {err}"
        else:
            action = f"emit {draw(st.sampled_from(['p', 'q', 'r', 'invalid']))}"
        lines.append(f"rule {guard()} -> {', '.join(assigns)}; {action}")
    return "\n".join(lines) + "\n", k
