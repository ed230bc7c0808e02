"""Seeded generator of synthetic C corpora with known vulnerable functions."""

import json
from dataclasses import (
    dataclass,
    field,
)
from typing import (
    Dict,
    List,
)

import numpy as np

OPTIONS = [f"CONFIG_OPT{i}" for i in range(40)]


@dataclass
class SyntheticCorpus:
    """Generated sources, the ids of the vulnerable functions and a matching CVE manifest."""

    files: Dict[str, str] = field(default_factory=dict)
    vulnerable: List[str] = field(default_factory=list)
    cve_manifest: List[dict] = field(default_factory=list)

    def cve_manifest_json(self) -> str:
        return json.dumps(self.cve_manifest)


def generate(
    n_functions: int,
    vulnerable_fraction: float = 0.1,
    functions_per_file: int = 25,
    seed: int = 0,
    n_options: int = len(OPTIONS),
) -> SyntheticCorpus:
    """Generate a corpus where vulnerable functions have more internal and fewer external options.

    Non-vulnerable functions open on average 0.5 directive groups and sit under 1 to 3 external
    options; vulnerable ones open three times as many groups and sit under 0 or 1 option. Options
    are drawn from the first ``n_options`` names (at least 3). Function names ``f<i>`` are unique
    across the corpus and calls only go to lower indices.
    """
    if not 3 <= n_options <= len(OPTIONS):
        raise ValueError(f"n_options must be between 3 and {len(OPTIONS)}")
    options = OPTIONS[:n_options]
    rng = np.random.default_rng(seed)
    corpus = SyntheticCorpus()
    vulnerable_flags = rng.random(n_functions) < vulnerable_fraction
    cve_number = 1000

    for file_index, first in enumerate(range(0, n_functions, functions_per_file)):
        path = f"src/unit{file_index}.c"
        lines: List[str] = []
        for i in range(first, min(first + functions_per_file, n_functions)):
            vulnerable = bool(vulnerable_flags[i])
            groups = rng.poisson(1.5 if vulnerable else 0.5)
            external = rng.integers(0, 2) if vulnerable else rng.integers(1, 4)
            wrap = list(rng.choice(options, size=external, replace=False))

            if wrap:
                lines.append("#if " + " && ".join(f"defined({name})" for name in wrap))
            lines.append(f"int f{i}(int x) {{")
            body_line = len(lines) + 1
            lines.append("  x = x + 1;")
            for _ in range(groups):
                lines.append(f"  #ifdef {rng.choice(options)}")
                lines.append(f"  x = x * {int(rng.integers(2, 9))};")
                if i > 0 and rng.random() < 0.5:
                    lines.append(f"  x += f{int(rng.integers(0, i))}(x);")
                lines.append("  #endif")
            if i > 0 and rng.random() < 0.3:
                lines.append(f"  x -= f{int(rng.integers(0, i))}(x);")
            lines.append("  return x;")
            lines.append("}")
            if wrap:
                lines.append("#endif")
            lines.append("")

            if vulnerable:
                fid = f"{path}::f{i}"
                corpus.vulnerable.append(fid)
                diff = f"--- a/{path}\n+++ b/{path}\n@@ -{body_line},1 +{body_line},1 @@\n-  x = x;\n+  x = x + 1;\n"
                corpus.cve_manifest.append(
                    {
                        "cve_id": f"CVE-2020-{cve_number}",
                        "commits": [
                            {"commit_id": f"c{cve_number:x}", "message": f"fix f{i}", "files": [{"path": path, "diff": diff}]}
                        ],
                    }
                )
                cve_number += 1
        corpus.files[path] = "\n".join(lines) + "\n"
    return corpus
