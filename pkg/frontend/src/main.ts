import { ReviewApp } from './app.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

// Served by the review service itself, so same-origin by default; an
// explicit ?api= override supports development against a separate port.
const params = new URLSearchParams(window.location.search);
const baseUrl = params.get('api') ?? '';
const reviewer = params.get('reviewer') ?? 'assessor';

void new ReviewApp(baseUrl, root, reviewer).start();
