"""Command-line entry points for the fact-sheet pipeline."""

from __future__ import annotations

import json
import sys

import click

from .agent import BlockStore, RunLog
from .errors import FactsheetError
from .export import sheet_to_pdf, sheet_to_svg
from .pipeline import (
    DEFAULT_TOKEN_BUDGET,
    add_fact_from_request,
    generate_sheet,
    prepare_dataset,
)
from .service import make_transport
from .sheet import SheetStore, apply_edit_ops


@click.group()
@click.option("--seed", default=0, show_default=True, help="Seed for anonymization and sampling.")
@click.option("--workspace", default="./workspace", show_default=True,
              help="Directory for sheets, charts, and run logs.")
@click.option("--transport", "transport_mode", default="offline", show_default=True,
              type=click.Choice(["live", "record", "replay", "offline"]))
@click.option("--fixtures", default=None, help="Fixture directory for record/replay transports.")
@click.option("--budget", default=DEFAULT_TOKEN_BUDGET, show_default=True,
              help="Token budget for the dataset representation.")
@click.pass_context
def main(ctx, seed, workspace, transport_mode, fixtures, budget):
    """Generate, edit, and export data fact sheets."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, workspace=workspace, budget=budget,
                   transport_mode=transport_mode, fixtures=fixtures)


def _prepared(ctx, csv_path):
    with open(csv_path, "rb") as fh:
        data = fh.read()
    name = csv_path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return prepare_dataset(data, name, ctx.obj["seed"], ctx.obj["budget"])


def _fail(exc: FactsheetError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def ingest(ctx, csv_path):
    """Parse and classify a CSV, print the column summary."""
    try:
        prepared = _prepared(ctx, csv_path)
    except FactsheetError as exc:
        _fail(exc)
    ds = prepared.dataset
    click.echo(f"{ds.name}: {ds.row_count} rows")
    for col in ds.columns:
        extra = f" ({col.entity_type})" if col.entity_type else ""
        click.echo(f"  {col.name}: {col.data_class}{extra}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def represent(ctx, csv_path):
    """Print the token-budgeted dataset representation."""
    try:
        prepared = _prepared(ctx, csv_path)
    except FactsheetError as exc:
        _fail(exc)
    click.echo(prepared.representation.text)
    click.echo(f"\n[{prepared.representation.token_estimate} tokens]", err=True)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--rows", default=10, show_default=True)
@click.pass_context
def anonymize(ctx, csv_path, rows):
    """Show anonymized example rows for a CSV."""
    try:
        prepared = _prepared(ctx, csv_path)
    except FactsheetError as exc:
        _fail(exc)
    from .anonymize import anonymize_rows
    click.echo(",".join(prepared.dataset.column_names))
    indices = list(range(min(rows, prepared.dataset.row_count)))
    for row in anonymize_rows(prepared.dataset, prepared.amap, indices):
        click.echo(",".join("" if v is None else str(v) for v in row))


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--request", "user_request", default=None,
              help="Optional focus for the generated facts.")
@click.option("--max-facts", default=12, show_default=True)
@click.pass_context
def generate(ctx, csv_path, user_request, max_facts):
    """Run the full pipeline and save the sheet into the workspace."""
    o = ctx.obj
    transport = make_transport(o["transport_mode"], o["fixtures"])
    blocks = BlockStore(f"{o['workspace']}/blocks")
    run_log = RunLog(f"{o['workspace']}/runs.jsonl")
    try:
        prepared = _prepared(ctx, csv_path)
        sheet = generate_sheet(prepared, o["seed"], transport, blocks,
                               user_request=user_request, run_log=run_log,
                               max_facts=max_facts)
    except FactsheetError as exc:
        _fail(exc)
    path = SheetStore(o["workspace"]).save(sheet)
    click.echo(f"sheet {sheet.id} -> {path}")
    for section in sheet.structure.sections:
        click.echo(f"  [{section.topic}] {len(section.fact_ids)} facts")


@main.command()
@click.argument("sheet_id")
@click.argument("ops_json")
@click.option("--revision", type=int, required=True,
              help="Revision the edits are based on.")
@click.pass_context
def edit(ctx, sheet_id, ops_json, revision):
    """Apply a JSON list of edit operations to a stored sheet."""
    store = SheetStore(ctx.obj["workspace"])
    try:
        ops = json.loads(ops_json)
        sheet = store.load(sheet_id)
        apply_edit_ops(sheet, revision, ops)
    except FactsheetError as exc:
        _fail(exc)
    except json.JSONDecodeError as exc:
        _fail(FactsheetError(f"ops must be valid JSON: {exc}"))
    store.save(sheet)
    click.echo(f"sheet {sheet_id} now at revision {sheet.revision}")


@main.command("add-fact")
@click.argument("sheet_id")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("request")
@click.pass_context
def add_fact(ctx, sheet_id, csv_path, request):
    """Add one natural-language-requested fact to a stored sheet."""
    o = ctx.obj
    store = SheetStore(o["workspace"])
    transport = make_transport(o["transport_mode"], o["fixtures"])
    blocks = BlockStore(f"{o['workspace']}/blocks")
    try:
        sheet = store.load(sheet_id)
        prepared = _prepared(ctx, csv_path)
        fact_id = add_fact_from_request(
            sheet, request, prepared, transport, blocks,
            RunLog(f"{o['workspace']}/runs.jsonl"),
        )
    except FactsheetError as exc:
        _fail(exc)
    store.save(sheet)
    click.echo(f"added {fact_id}; sheet at revision {sheet.revision}")


@main.command()
@click.argument("sheet_id")
@click.option("--format", "fmt", default="svg", show_default=True,
              type=click.Choice(["svg", "pdf"]))
@click.option("--out", "-o", "out_path", default=None, help="Output file (default stdout).")
@click.pass_context
def export(ctx, sheet_id, fmt, out_path):
    """Render a stored sheet to SVG or PDF."""
    try:
        sheet = SheetStore(ctx.obj["workspace"]).load(sheet_id)
        data = sheet_to_svg(sheet).encode() if fmt == "svg" else sheet_to_pdf(sheet)
    except FactsheetError as exc:
        _fail(exc)
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(data)
        click.echo(f"wrote {out_path}")
    else:
        sys.stdout.buffer.write(data)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.pass_context
def serve(ctx, host, port):
    """Start the HTTP API."""
    import uvicorn

    from .service import create_app

    o = ctx.obj
    app = create_app(o["workspace"],
                     make_transport(o["transport_mode"], o["fixtures"]),
                     seed=o["seed"], token_budget=o["budget"])
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
