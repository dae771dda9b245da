"""Markdown and sanitized HTML renderings of verification reports."""

import bleach
import markdown as md

# Allowed HTML tags in a rendered report
ALLOWED_TAGS = ['p', 'h1', 'h2', 'h3', 'strong', 'em', 'code', 'pre',
                'ul', 'li', 'table', 'thead', 'tbody', 'tr', 'th', 'td']
ALLOWED_ATTRS = {
    'td': ['align'],
    'th': ['align'],
}


def _escape_cell(value) -> str:
    return str(value).replace('|', '\\|').replace('\n', ' ')


def render_markdown(report: dict) -> str:
    """Summary table of a suite run: one row per check."""
    status = 'PASSED' if report['passed'] else 'FAILED'
    lines = [
        f"# Verification: {report['suite']}",
        '',
        f"**{status}** with seed `{report['seed']}` over {report['cases']} cases.",
        '',
        '| check | cases | max residual | threshold | status |',
        '|-------|------:|-------------:|----------:|--------|',
    ]
    for check in report['checks']:
        residual = check['max_residual']
        lines.append('| {} | {} | {} | {:.3g} | {} |'.format(
            _escape_cell(check['name']), check['cases'], 'error' if residual is None else f'{residual:.3g}',
            check['threshold'], 'ok' if check['passed'] else '**fail**'))

    failures = [c for c in report['checks'] if not c['passed']]
    if failures:
        lines += ['', '## First failures', '']
        for check in failures:
            case = check.get('failure') or {}
            detail = ', '.join(f'{k}={_escape_cell(v)}' for k, v in sorted(case.items()) if k != 'documents')
            lines.append(f"- `{_escape_cell(check['name'])}`: {detail}")
    return '\n'.join(lines) + '\n'


def render_html(report: dict) -> str:
    """Convert the markdown report to sanitized HTML."""
    html = md.markdown(render_markdown(report), extensions=['tables'])
    return bleach.clean(html, tags=ALLOWED_TAGS, attributes=ALLOWED_ATTRS,
                        protocols=['http', 'https'], strip=True)
