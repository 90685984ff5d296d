"""Cross-cutting helpers: logging setup and environment lookup."""
