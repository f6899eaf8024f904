from django.db import models

# No models needed - trials are regenerated from their seeds
