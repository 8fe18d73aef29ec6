"""Write the frozen fixtures to ``data/`` as DAG text files and SCM JSON."""

from __future__ import annotations

from pathlib import Path

from wcde import fixtures, io

OUT = Path(__file__).resolve().parent.parent / "data"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    q = fixtures.QUERY
    for name, scm in fixtures.discrete_fixtures().items():
        io.dump_scm(scm, OUT / f"{name}.json", q)
        if name != "figure1_unfaithful":
            (OUT / f"{name}.dag").write_text(io.serialize_dag(scm.dag))
    lin = fixtures.interaction_scm()
    io.dump_scm(lin, OUT / "interaction.json", q)
    (OUT / "interaction.dag").write_text(io.serialize_dag(lin.dag))


if __name__ == "__main__":
    main()
