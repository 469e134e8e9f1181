import re
from pathlib import Path


def test_quickstart_executes():
    text = (Path(__file__).parent.parent / "README.md").read_text()
    block = re.search(r"## Quick start \(Python\)\n\n```python\n(.*?)```",
                      text, re.S).group(1)
    exec(compile(block, "README-quickstart", "exec"), {})
