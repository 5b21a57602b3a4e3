# scripts/gen_docs.py
"""
A script to dynamically generate documentation files for MkDocs.
This is run automatically by the mkdocs-gen-files plugin.
"""

from pathlib import Path

import mkdocs_gen_files

print("--- Running gen_docs.py ---")

# Copy the root README.md to be the documentation's index page.
# This allows us to maintain a single source of truth for the project's
# main landing page, which is visible on both GitHub and the docs site.
with mkdocs_gen_files.open("index.md", "w") as index:
    index.write(Path("README.md").read_text(encoding="utf-8"))
    print("✓ Copied README.md to index.md")

# One mkdocstrings page per service module, plus an index linking them
pages: list[Path] = []
for source in sorted(Path("app/services").rglob("*.py")):
    if source.name == "__init__.py":
        continue
    module = ".".join(source.with_suffix("").parts)
    page = Path("reference", *source.with_suffix(".md").parts[2:])
    with mkdocs_gen_files.open(page, "w") as doc:
        doc.write(f"::: {module}\n")
    mkdocs_gen_files.set_edit_path(page, source)
    pages.append(page)
    print(f"✓ Generated {page}")

with mkdocs_gen_files.open("reference/index.md", "w") as index:
    index.write("# Reference\n\n")
    for page in pages:
        target = page.relative_to("reference").as_posix()
        index.write(f"- [{target.removesuffix('.md')}]({target})\n")
