import { ApiClient } from './api.js';
import { SessionApp } from './app.js';

declare global {
  interface Window {
    MONOCAT_BASE?: string;
  }
}

const params = new URLSearchParams(window.location.search);
const base = params.get('api') ?? window.MONOCAT_BASE ?? 'http://localhost:8000';
const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

new SessionApp(root, new ApiClient(base));
