from django.db import models

# No models needed - experiment results are written to CSV, not stored
