"""Returns every request unchanged."""

from _frames import requests, respond

for _noise, x in requests():
    respond(x)
