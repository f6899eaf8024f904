import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'capacity_toolkit.settings')
django.setup()
